"""Flat ``key = value`` study configuration files."""

from dataclasses import dataclass, field


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


def _floats(s, count=None):
    vals = [float(v) for v in s.split(",") if v.strip()]
    if count is not None and len(vals) != count:
        raise ValueError(f"expected {count} comma-separated numbers")
    return vals


def _positive(v):
    v = float(v)
    if not v > 0:
        raise ValueError("must be positive")
    return v


def _choice(*options):
    def conv(v):
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v
    return conv


def _degree(v):
    v = int(v)
    if v not in (0, 1, 2):
        raise ValueError("must be 0, 1 or 2")
    return v


def _levels(v):
    out = [int(x) for x in v.split(",") if x.strip()]
    if not out or min(out) < 1:
        raise ValueError("need at least one positive level")
    return out


PARSERS = {
    "problem": _choice("paper", "mms", "zero"),
    "k": _degree,
    "study_levels": _levels,
    "reference_n": int,
    "strategy": _choice("monolithic", "condensed"),
    "h_mode": _choice("local", "global"),
    "tau2": _positive,
    "beta": lambda v: tuple(_floats(v, 2)),
    "gamma": _positive,
    "domain_length": _positive,
    "output_dir": str,
}


@dataclass
class StudyConfig:
    problem: str = "paper"
    k: int = 1
    study_levels: list = field(default_factory=lambda: [2, 4, 8, 16])
    reference_n: int = 128
    strategy: str = "condensed"
    h_mode: str = "local"
    tau2: float = 1.0
    beta: tuple = (1.0, 1.0)
    gamma: float = 1.0
    domain_length: float = 0.125
    output_dir: str = "."

    def check(self):
        levels = sorted(self.study_levels)
        base = levels[0]
        for n in levels:
            ratio = n // base
            if n % base or ratio & (ratio - 1):
                raise ConfigError(
                    f"study_levels must be powers of two times the smallest level, got {levels}"
                )
        if self.problem in ("paper", "zero"):
            r = self.reference_n // base
            if self.reference_n % base or r & (r - 1):
                raise ConfigError("reference_n must be a power of two times the smallest level")
        if self.problem == "paper" and self.reference_n < 8 * levels[-1]:
            raise ConfigError(
                f"reference_n ({self.reference_n}) must be >= 8 x max(study_levels) "
                f"= {8 * levels[-1]}"
            )
        return self


def parse_config(text):
    """Parse config text; raises ``ConfigError`` carrying the line number."""
    cfg = StudyConfig()
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in PARSERS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        seen.add(key)
        try:
            setattr(cfg, key, PARSERS[key](value))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}", lineno) from None
    return cfg.check()


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())

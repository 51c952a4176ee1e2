"""Experiment configuration: INI files with one level of sections, validated with line numbers."""
from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .coeffs import KINDS, POWER_LAW


def _flist(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _opt_float(text: str):
    return None if text.strip() == "" else float(text)


# section -> key -> parser
SCHEMA = {
    "run": {"seed": int},
    "sector": {"n": int, "ell": int, "Lambda": float, "lambda0": float},
    "profile": {"kind": str, "sigma1": float, "r0": float, "c": _opt_float},
    "basis": {"R": float, "K": int},
    "packet": {"rc": float, "w": float, "k": float},
    "assumptions": {"t_max": float, "grid_points": int, "T_list": _flist, "ode_dt": float,
                    "ode_t_max": float},
    "evolve": {"s": float, "times": _flist, "oracle_M": int, "oracle_dt": float},
    "oracle": {"s": float, "t": float, "M": int, "dt": _flist},
    "waveop": {"R": float, "K": int, "rc": float, "w": float, "k": float, "taus": _flist},
    "smoothing": {"T": _flist, "dt": float},
    "strichartz": {"R": float, "K": int, "T": _flist, "pairs": int, "per_octave": int,
                   "sup_count": int},
    "nls": {"R": float, "K": int, "lambda_nl": float, "theta": float, "s": float, "T": float,
            "dt": float, "samples": int},
}


class ConfigError(ValueError):
    def __init__(self, diagnostics: list[str]):
        super().__init__("\n".join(diagnostics))
        self.diagnostics = diagnostics


def default_config_text() -> str:
    return resources.files("invsq").joinpath("data/default.ini").read_text()


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=None)
    cp.optionxform = str
    return cp


def _line_index(text: str) -> dict[tuple[str, str], int]:
    out, section = {}, None
    for i, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            continue
        m = re.match(r"\s*([^#;=\s][^=]*?)\s*=", line)
        if m and section is not None:
            out[(section, m.group(1))] = i
    return out


@dataclass
class ExperimentConfig:
    values: dict
    source: str = "<default>"
    lines: dict = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict:
        return self.values[section]

    def where(self, section: str, key: str) -> str:
        line = self.lines.get((section, key))
        return f"{self.source}:{line}" if line else f"{self.source} (default)"

    @property
    def seed(self) -> int:
        return self.values["run"]["seed"]

    def canonical(self) -> str:
        parts = []
        for sec in SCHEMA:
            for key in SCHEMA[sec]:
                parts.append(f"{sec}.{key}={self.values[sec][key]!r}")
        return "\n".join(parts)

    @property
    def hash(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]


def load_config(path: str | Path | None = None, seed: int | None = None,
                command: str | None = None) -> ExperimentConfig:
    """Read the packaged defaults, overlay ``path`` and validate; raises ConfigError."""
    cp = _parser()
    cp.read_string(default_config_text(), source="<default>")
    diags: list[str] = []
    lines: dict = {}
    source = "<default>"
    if path is not None:
        source = str(path)
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError([f"{source}: cannot read config ({exc.strerror})"]) from None
        user = _parser()
        try:
            user.read_string(text, source=source)
        except configparser.Error as exc:
            raise ConfigError([f"{source}: malformed config: {exc}"]) from None
        lines = _line_index(text)
        for sec in user.sections():
            if sec not in SCHEMA:
                diags.append(f"{source}:{lines.get((sec, next(iter(user[sec]), ''))) or '?'}: "
                             f"unknown section [{sec}]")
                continue
            for key, val in user[sec].items():
                if key not in SCHEMA[sec]:
                    diags.append(f"{source}:{lines.get((sec, key), '?')}: {sec}.{key}: unknown key")
                else:
                    cp[sec][key] = val
    values: dict = {}
    cfg = ExperimentConfig(values, source, lines)
    for sec, keys in SCHEMA.items():
        values[sec] = {}
        for key, conv in keys.items():
            raw = cp[sec][key]
            try:
                values[sec][key] = conv(raw)
            except ValueError:
                diags.append(f"{cfg.where(sec, key)}: {sec}.{key}: cannot parse {raw!r}")
                values[sec][key] = None
    if seed is not None:
        values["run"]["seed"] = int(seed)
    if not diags:
        diags = validate(cfg, command)
    if diags:
        raise ConfigError(diags)
    return cfg


def validate(cfg: ExperimentConfig, command: str | None = None) -> list[str]:
    """One diagnostic per violated rule, naming the field, its location and the rule.

    ``command`` adds the rules specific to one subcommand.
    """
    d: list[str] = []

    def bad(sec, key, rule):
        d.append(f"{cfg.where(sec, key)}: {sec}.{key}: {rule}")

    v = cfg.values
    sd = v["run"]["seed"]
    if not 0 <= sd < 2**64:
        bad("run", "seed", "seed must be an unsigned 64-bit integer")

    sec = v["sector"]
    if sec["n"] < 3:
        bad("sector", "n", "n must be >= 3")
    if sec["ell"] < 0:
        bad("sector", "ell", "ell must be >= 0")
    if not sec["lambda0"] > 0:
        bad("sector", "lambda0", "lambda0 must be > 0")
    elif sec["n"] >= 3 and sec["Lambda"] > (sec["n"] - 2) ** 2 / 8.0 - sec["lambda0"]:
        bad("sector", "Lambda", "Lambda exceeds (n-2)^2/8 - lambda0")

    pr = v["profile"]
    if pr["kind"] not in KINDS:
        bad("profile", "kind", f"kind must be one of {', '.join(KINDS)}")
    elif pr["kind"] != POWER_LAW:
        bad("profile", "kind", "only power_law profiles can be run from a config file")
    if not 0 < pr["sigma1"] <= 0.25:
        bad("profile", "sigma1", "sigma1 must lie in (0, 1/4]")
    if not pr["r0"] > 0:
        bad("profile", "r0", "r0 must be > 0")
    if pr["c"] is not None and (pr["c"] == 0 or not math.isfinite(pr["c"])):
        bad("profile", "c", "c must be a nonzero finite number")
    r0 = pr["r0"]

    for s in ("basis", "waveop", "strichartz", "nls"):
        if not v[s]["R"] > 0:
            bad(s, "R", "R must be > 0")
        if v[s]["K"] < 8:
            bad(s, "K", "K must be >= 8")

    for s in ("packet", "waveop"):
        if not v[s]["rc"] >= 0:
            bad(s, "rc", "rc must be >= 0")
        if not v[s]["w"] > 0:
            bad(s, "w", "w must be > 0")

    a = v["assumptions"]
    if not a["t_max"] > r0:
        bad("assumptions", "t_max", "t_max must exceed r0")
    if a["grid_points"] < 2:
        bad("assumptions", "grid_points", "grid_points must be >= 2")
    if not _increasing(a["T_list"]) or min(a["T_list"], default=0) < r0:
        bad("assumptions", "T_list", "T_list must be nonempty, increasing and >= r0")
    if not a["ode_dt"] > 0:
        bad("assumptions", "ode_dt", "ode_dt must be > 0")
    if not a["ode_t_max"] >= r0:
        bad("assumptions", "ode_t_max", "ode_t_max must be >= r0")

    e = v["evolve"]
    if e["s"] < r0:
        bad("evolve", "s", "s must be >= r0 (factorization region)")
    if not _increasing(e["times"]) or min(e["times"], default=0) < e["s"]:
        bad("evolve", "times", "times must be nonempty, increasing and >= s")
    if e["oracle_M"] < 16:
        bad("evolve", "oracle_M", "oracle_M must be >= 16")
    if not e["oracle_dt"] > 0:
        bad("evolve", "oracle_dt", "oracle_dt must be > 0")

    o = v["oracle"]
    if o["s"] < r0:
        bad("oracle", "s", "s must be >= r0 (factorization region)")
    if not o["t"] > o["s"]:
        bad("oracle", "t", "t must exceed s")
    if o["M"] < 16:
        bad("oracle", "M", "M must be >= 16")
    if len(o["dt"]) < 2 or any(x <= 0 for x in o["dt"]):
        bad("oracle", "dt", "dt needs at least two positive values")

    w = v["waveop"]
    if len(w["taus"]) < 4 or not _increasing(w["taus"]) or w["taus"][0] < 0:
        bad("waveop", "taus", "taus needs >= 4 strictly increasing values >= 0")

    sm = v["smoothing"]
    if not _increasing(sm["T"]) or min(sm["T"], default=0) <= 0:
        bad("smoothing", "T", "T must be nonempty, increasing and > 0")
    if not sm["dt"] > 0:
        bad("smoothing", "dt", "dt must be > 0")

    st = v["strichartz"]
    if st["pairs"] < 2:
        bad("strichartz", "pairs", "pairs must be >= 2")
    if st["per_octave"] < 1:
        bad("strichartz", "per_octave", "per_octave must be >= 1")
    if st["sup_count"] < 1:
        bad("strichartz", "sup_count", "sup_count must be >= 1")
    Ts = st["T"]
    if not _increasing(Ts) or min(Ts, default=0) <= r0:
        bad("strichartz", "T", "T must be nonempty, increasing and > r0")
    elif st["per_octave"] >= 1:
        for T in Ts:
            m = st["per_octave"] * math.log2(T / r0)
            if abs(m - round(m)) > 1e-9:
                bad("strichartz", "T", f"T={T} is not r0 * 2^(m/per_octave) for an integer m")

    nl = v["nls"]
    n = sec["n"]
    if n >= 3 and not 1 < nl["theta"] < 4.0 / n:
        bad("nls", "theta", "theta must lie in (1, 4/n)")
    if nl["lambda_nl"] == 0:
        bad("nls", "lambda_nl", "lambda_nl must be nonzero")
    if not nl["dt"] > 0:
        bad("nls", "dt", "dt must be > 0")
    if nl["s"] < r0:
        bad("nls", "s", "s must be >= r0")
    if not nl["T"] > nl["s"]:
        bad("nls", "T", "T must exceed s")
    if nl["samples"] < 1:
        bad("nls", "samples", "samples must be >= 1")
    if command in ("strichartz", "nls") and sec["ell"] != 0:
        bad("sector", "ell", f"{command} needs radial data (ell = 0)")
    return d


def _increasing(xs) -> bool:
    return len(xs) > 0 and all(b > a for a, b in zip(xs, xs[1:]))

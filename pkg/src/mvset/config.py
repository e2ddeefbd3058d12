"""Run configuration: strict key = value files with a canonical echo.

The format is line oriented: `[section]` headers, `key = value` entries,
blank lines, and full-line comments starting with #.  Parsing is strict:
unknown sections or keys, duplicate keys, and malformed values are errors
that name the offending line, because a silently ignored tolerance or radius
would corrupt an acceptance run.  canonical_text renders a parsed config in
a fixed layout, and parsing that text again reproduces the config exactly.
"""

from __future__ import annotations

from dataclasses import dataclass


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    dim: int = 2
    origin: tuple = (0.0, 0.0)
    extent: tuple = (1.0, 1.0)
    nodes: int = 129
    family: str = "identity"
    x0: tuple = (0.5, 0.5)
    radii: tuple = (0.25,)
    tol: float = 1e-10
    directory: str = "out"
    field_format: str = "csv"


_SECTIONS = {
    "grid": ("dim", "origin", "extent", "nodes"),
    "coefficients": ("family",),
    "problem": ("x0", "radii", "tol"),
    "output": ("directory", "field_format"),
}
_REQUIRED = ("nodes", "x0", "radii")
_FORMATS = ("csv", "raw", "both")


def _parse_floats(text: str, what: str, lineno: int) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"line {lineno}: {what} must be a comma-separated "
                          f"list of numbers, got {text!r}") from None


def parse_config_text(text: str, source: str = "<string>") -> RunConfig:
    values: dict = {}
    first_line: dict = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"{source}, line {lineno}: unknown section "
                                  f"[{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"{source}, line {lineno}: expected key = value, "
                              f"got {line!r}")
        if section is None:
            raise ConfigError(f"{source}, line {lineno}: key outside any "
                              f"[section]")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _SECTIONS[section]:
            raise ConfigError(f"{source}, line {lineno}: unknown key {key!r} "
                              f"in section [{section}]")
        if key in values:
            raise ConfigError(f"{source}, line {lineno}: duplicate key {key!r}, "
                              f"first set on line {first_line[key]}")
        values[key] = val
        first_line[key] = lineno

    for key in _REQUIRED:
        if key not in values:
            raise ConfigError(f"{source}: missing required key {key!r}")

    lines = first_line

    def get(key, default):
        return values.get(key, default)

    try:
        dim = int(get("dim", "2"))
    except ValueError:
        raise ConfigError(f"{source}, line {lines['dim']}: dim must be an "
                          f"integer") from None
    if dim not in (2, 3):
        raise ConfigError(f"{source}: dim must be 2 or 3, got {dim}")
    try:
        nodes = int(values["nodes"])
    except ValueError:
        raise ConfigError(f"{source}, line {lines['nodes']}: nodes must be an "
                          f"integer") from None

    origin = _parse_floats(get("origin", ", ".join(["0"] * dim)), "origin",
                           lines.get("origin", 0))
    extent = _parse_floats(get("extent", ", ".join(["1"] * dim)), "extent",
                           lines.get("extent", 0))
    x0 = _parse_floats(values["x0"], "x0", lines["x0"])
    radii = _parse_floats(values["radii"], "radii", lines["radii"])
    for name, tup in (("origin", origin), ("extent", extent), ("x0", x0)):
        if len(tup) != dim:
            raise ConfigError(f"{source}: {name} needs {dim} entries, got "
                              f"{len(tup)}")
    if not radii:
        raise ConfigError(f"{source}: radii list is empty")
    if any(r <= 0 for r in radii):
        raise ConfigError(f"{source}: radii must be positive")
    if list(radii) != sorted(set(radii)):
        raise ConfigError(f"{source}: radii must be strictly increasing")

    try:
        tol = float(get("tol", "1e-10"))
    except ValueError:
        raise ConfigError(f"{source}, line {lines['tol']}: tol must be a "
                          f"number") from None
    if tol <= 0:
        raise ConfigError(f"{source}: tol must be positive")

    fmt = get("field_format", "csv")
    if fmt not in _FORMATS:
        raise ConfigError(f"{source}: field_format must be one of "
                          f"{_FORMATS}, got {fmt!r}")

    return RunConfig(dim=dim, origin=origin, extent=extent, nodes=nodes,
                     family=get("family", "identity"), x0=x0, radii=radii,
                     tol=tol, directory=get("directory", "out"),
                     field_format=fmt)


def parse_config(path: str) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read(), source=str(path))


def _num(v: float) -> str:
    return repr(int(v)) if float(v).is_integer() and abs(v) < 1e15 else repr(v)


def _nums(vs) -> str:
    return ", ".join(_num(v) for v in vs)


def canonical_text(cfg: RunConfig) -> str:
    """Fixed-layout rendering; parsing it reproduces the config exactly."""
    return (
        "[grid]\n"
        f"dim = {cfg.dim}\n"
        f"origin = {_nums(cfg.origin)}\n"
        f"extent = {_nums(cfg.extent)}\n"
        f"nodes = {cfg.nodes}\n"
        "\n[coefficients]\n"
        f"family = {cfg.family}\n"
        "\n[problem]\n"
        f"x0 = {_nums(cfg.x0)}\n"
        f"radii = {_nums(cfg.radii)}\n"
        f"tol = {_num(cfg.tol)}\n"
        "\n[output]\n"
        f"directory = {cfg.directory}\n"
        f"field_format = {cfg.field_format}\n"
    )

from pathlib import Path

import voluptuous as vol
import yaml

from . import CONFIG_SCHEMA
from .components.errors import ConfigError
from .components.types import RunConfig

MODE_REQUIREMENTS = {
    "sweep": ("mu_list",),
    "periodic": ("L0_list",),
}


def load_config(config_path: str | Path) -> RunConfig:
    """Read a JSON (or YAML) document and apply CONFIG_SCHEMA."""
    try:
        with open(config_path) as f:
            raw = yaml.safe_load(f)
    except OSError as err:
        raise ConfigError(f"Cannot read config {config_path}: {err}") from err
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"Config {config_path} is not valid JSON/YAML{where}: {err}") from err
    if not isinstance(raw, dict):
        raise ConfigError(f"Config {config_path} must be a mapping at the top level")
    return apply_schema(raw)


def apply_schema(raw: dict) -> RunConfig:
    try:
        return CONFIG_SCHEMA(raw)
    except vol.MultipleInvalid as err:
        messages = [f"{'.'.join(str(p) for p in e.path) or '<root>'}: {e.msg}" for e in err.errors]
        raise ConfigError("Invalid config: " + "; ".join(messages), {"errors": messages}) from err


def _kernel_k(config: dict) -> int | None:
    kernel = config.get("kernel")
    return len(kernel) if kernel is not None else None


def validate_config(config: dict) -> list[str]:
    errors: list[str] = []
    n = config.get("dimension", 1)
    kernel = config.get("kernel")
    nonlinearity = config.get("nonlinearity")
    mode = config.get("mode", "solve")

    # 1. Check that a problem is defined at all
    if config.get("preset") is None and (kernel is None or nonlinearity is None):
        errors.append("Either 'preset' or both 'kernel' and 'nonlinearity' must be given")

    # 2. Check that the kernel is square
    if kernel is not None:
        k = len(kernel)
        bad_rows = [i for i, row in enumerate(kernel) if len(row) != k]
        if k == 0 or bad_rows:
            errors.append(f"'kernel' must be a square matrix, rows {bad_rows} have the wrong length")
        if kernel and all(entry is None for row in kernel for entry in row):
            errors.append("'kernel' has no nonzero entry")

    # 3. Check kernel k against nonlinearity k
    k_kernel = _kernel_k(config)
    if k_kernel is not None and nonlinearity is not None:
        table = nonlinearity.get("polynomial", [])
        if len(table) != k_kernel:
            errors.append(
                f"'kernel' has k = {k_kernel} components but 'nonlinearity.polynomial' has {len(table)}"
            )
        for i, row in enumerate(table):
            for term in row:
                if len(term.get("powers", [])) != len(table):
                    errors.append(
                        f"'nonlinearity.polynomial[{i}]' term powers {term.get('powers')} do not match "
                        f"k = {len(table)}"
                    )
        fold = nonlinearity.get("fold")
        if fold is not None:
            for key in ("state", "tangent"):
                if len(fold[key]) != k_kernel:
                    errors.append(
                        f"'nonlinearity.fold.{key}' has {len(fold[key])} entries but 'kernel' has k = {k_kernel}"
                    )

    # 4. Check kernel entries against the dimension
    for i, row in enumerate(kernel or []):
        for j, entry in enumerate(row):
            if entry is None:
                continue
            width = entry.get("width", 1.0)
            if isinstance(width, list) and len(width) != n:
                errors.append(
                    f"'kernel[{i}][{j}].width' has {len(width)} entries but 'dimension' is {n}"
                )
            if entry["family"] == "algebraic":
                p = entry.get("p")
                if p is None or p <= (n + 2) / 2:
                    errors.append(
                        f"'kernel[{i}][{j}].p' = {p} must exceed (dimension + 2) / 2 = {(n + 2) / 2}"
                    )
            if entry["family"] == "grid" and not entry.get("file"):
                errors.append(f"'kernel[{i}][{j}]' of family 'grid' needs 'file'")

    # 5. Check symmetry generators against the dimension
    generators = config.get("symmetry", {}).get("generators", [])
    for index, g in enumerate(generators):
        if len(g) != n or any(len(row) != n for row in g):
            errors.append(
                f"'symmetry.generators[{index}]' is not {n} x {n} for 'dimension' = {n}"
            )

    # 6. Check grid parameters against the dimension
    L = config.get("grid", {}).get("L")
    if isinstance(L, list) and len(L) != n:
        errors.append(f"'grid.L' has {len(L)} entries but 'dimension' is {n}")
    N = config.get("grid", {}).get("N")
    if N is not None and N % 2:
        errors.append(f"'grid.N' = {N} must be even")

    # 7. Check mode-specific keys
    for key in MODE_REQUIREMENTS.get(mode, ()):
        if not config.get(key):
            errors.append(f"'mode' = {mode} requires '{key}'")
    if mode == "periodic" and config.get("mu") is None:
        errors.append("'mode' = periodic requires 'mu'")

    # 8. Check mu ordering for sweeps
    mu_list = config.get("mu_list") or []
    if any(b >= a for a, b in zip(mu_list, mu_list[1:])):
        errors.append(f"'mu_list' must be strictly decreasing, got {mu_list}")

    # 9. Check the traveling-wave transform
    if config.get("traveling_speed", 0.0) and n != 1:
        errors.append(f"'traveling_speed' needs 'dimension' = 1, got {n}")

    return errors

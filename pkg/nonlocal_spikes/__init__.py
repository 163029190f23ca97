"""The nonlocal_spikes package."""

import logging

import voluptuous as vol

from .components.constants import DEFAULT_ELL
from .components.kernel import FAMILIES

_LOGGER = logging.getLogger(__name__)
DOMAIN = "nonlocal_spikes"

MODES = ("solve", "sweep", "periodic", "hypotheses-only", "tail")
NAMED_GROUPS = ("reflections", "inversion", "hyperoctahedral")

number = vol.All(vol.Coerce(float), vol.Range(min=-1e300, max=1e300))
positive = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))

# Schema for one scalar kernel entry
KERNEL_ENTRY_SCHEMA = vol.Schema(
    {
        vol.Required("family"): vol.In(FAMILIES),
        vol.Optional("amplitude", default=1.0): number,
        vol.Optional("width", default=1.0): vol.Any(positive, [positive]),
        vol.Optional("p"): positive,
        vol.Optional("file"): str,
    }
)

# Schema for one polynomial term coef * mu^mu * prod U_i^powers[i]
TERM_SCHEMA = vol.Schema(
    {
        vol.Required("coef"): number,
        vol.Optional("mu", default=0): vol.All(int, vol.Range(min=0)),
        vol.Required("powers"): [vol.All(int, vol.Range(min=0))],
    }
)

FOLD_SCHEMA = vol.Schema(
    {
        vol.Required("state"): [number],
        vol.Required("mu"): number,
        vol.Required("tangent"): [number],
        vol.Optional("mu_sign", default=1): vol.In([1, -1]),
    }
)

NONLINEARITY_SCHEMA = vol.Schema(
    {
        vol.Required("polynomial"): [[TERM_SCHEMA]],
        vol.Optional("fold"): FOLD_SCHEMA,
    }
)

PRESET_SCHEMA = vol.Schema(
    {
        vol.Required("name"): str,
        vol.Optional("params", default={}): {str: vol.Any(number, str)},
    }
)

SYMMETRY_SCHEMA = vol.Schema(
    {
        vol.Exclusive("generators", "group"): [[[vol.In([-1, 0, 1])]]],
        vol.Exclusive("named", "group"): vol.In(NAMED_GROUPS),
    }
)

GRID_SCHEMA = vol.Schema(
    {
        vol.Optional("L"): vol.Any(positive, [positive]),
        vol.Optional("N"): vol.All(int, vol.Range(min=8)),
    }
)

TOLERANCE_SCHEMA = vol.Schema(
    {
        vol.Optional(key): positive
        for key in ("inner", "outer", "null", "det", "degenerate", "residual", "nondegeneracy")
    }
)

# Main configuration schema
CONFIG_SCHEMA = vol.Schema(
    {
        vol.Required("dimension", default=1): vol.In([1, 2, 3]),
        vol.Optional("kernel"): [[vol.Any(None, KERNEL_ENTRY_SCHEMA)]],
        vol.Optional("nonlinearity"): NONLINEARITY_SCHEMA,
        vol.Optional("preset"): PRESET_SCHEMA,
        vol.Optional("symmetry"): SYMMETRY_SCHEMA,
        vol.Optional("grid", default={}): GRID_SCHEMA,
        vol.Optional("ell", default=DEFAULT_ELL): vol.All(int, vol.Range(min=2)),
        vol.Optional("mu"): positive,
        vol.Optional("mu_list"): [positive],
        vol.Optional("L0_list"): [positive],
        vol.Optional("traveling_speed", default=0.0): number,
        vol.Optional("mode", default="solve"): vol.In(MODES),
        vol.Optional("order"): vol.In([2, 3]),
        vol.Optional("full_newton", default=False): bool,
        vol.Optional("dump_multipliers", default=False): bool,
        vol.Optional("tolerances", default={}): TOLERANCE_SCHEMA,
        vol.Optional("output_dir"): str,
        vol.Optional("seed", default=0): vol.All(int, vol.Range(min=0)),
    },
    extra=vol.PREVENT_EXTRA,
)

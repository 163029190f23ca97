from typing import Any, Literal, Optional, TypedDict, Union

Family = Literal["exponential", "gaussian", "algebraic", "grid"]
Mode = Literal["solve", "sweep", "periodic", "hypotheses-only", "tail"]


class KernelEntryConfig(TypedDict, total=False):
    family: Family
    amplitude: float
    width: Union[float, list[float]]
    p: float
    file: str


class PolynomialTermConfig(TypedDict, total=False):
    coef: float
    mu: int
    powers: list[int]


class PresetConfig(TypedDict, total=False):
    name: str
    params: dict[str, Any]


class FoldConfig(TypedDict, total=False):
    state: list[float]
    mu: float
    tangent: list[float]
    mu_sign: float


class NonlinearityConfig(TypedDict, total=False):
    polynomial: list[list[PolynomialTermConfig]]
    fold: FoldConfig


class SymmetryConfig(TypedDict, total=False):
    generators: list[list[list[int]]]
    named: Literal["reflections", "inversion", "hyperoctahedral"]


class GridConfig(TypedDict, total=False):
    L: Union[float, list[float]]
    N: int


class ToleranceConfig(TypedDict, total=False):
    inner: float
    outer: float
    null: float
    det: float
    degenerate: float
    residual: float
    nondegeneracy: float


class RunConfig(TypedDict, total=False):
    dimension: int
    kernel: list[list[Optional[KernelEntryConfig]]]
    nonlinearity: NonlinearityConfig
    preset: PresetConfig
    symmetry: SymmetryConfig
    grid: GridConfig
    ell: int
    mu: float
    mu_list: list[float]
    L0_list: list[float]
    traveling_speed: float
    mode: Mode
    order: int
    full_newton: bool
    dump_multipliers: bool
    tolerances: ToleranceConfig
    output_dir: str
    seed: int

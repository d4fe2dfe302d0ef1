from .dinkelbach import DinkelbachResult, dinkelbach
from .program import (AffineEq, AffineIneq, ConvexProgram, NormLeAffine,
                      PowCube, ProgramBuilder, SquareOverLin, VarRef, dump)
from .sca import SCAResult, SurrogateValidityError, sca_drive
from .solve import FEAS_TOL, Solution, SolverError, solve

__all__ = [
    "AffineEq", "AffineIneq", "ConvexProgram", "NormLeAffine", "PowCube",
    "ProgramBuilder", "SquareOverLin", "VarRef", "dump",
    "Solution", "SolverError", "solve", "FEAS_TOL",
    "dinkelbach", "DinkelbachResult",
    "sca_drive", "SCAResult", "SurrogateValidityError",
]

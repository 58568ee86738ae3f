from .base_solver import BaseSolver, NotConvergedError
from .purc import PurcSolver
from .equilibrium import EquilibriumSolver

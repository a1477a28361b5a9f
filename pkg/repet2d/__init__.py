"""repet2d: repetitiveness measures, grammars and macro schemes for 2D strings."""

from repet2d.core2d import Matrix2D, WorkBudget, concat_h, concat_v, factor_count, load_matrix, read_matrix, submatrix
from repet2d.errors import BudgetExceeded, ParseError, Repet2DError, ValidationError
from repet2d.families import family
from repet2d.grammar2d import Grammar2D, expand, g_exact, read_grammar, validate
from repet2d.macroscheme import MacroScheme2D, decode, from_grammar, identity_scheme
from repet2d.measures import delta, delta_square, gamma_exact, is_attractor

__version__ = '0.1.0'

__all__ = [
    'BudgetExceeded',
    'Grammar2D',
    'MacroScheme2D',
    'Matrix2D',
    'ParseError',
    'Repet2DError',
    'ValidationError',
    'WorkBudget',
    'concat_h',
    'concat_v',
    'decode',
    'delta',
    'delta_square',
    'expand',
    'factor_count',
    'family',
    'from_grammar',
    'g_exact',
    'gamma_exact',
    'identity_scheme',
    'is_attractor',
    'load_matrix',
    'read_grammar',
    'read_matrix',
    'submatrix',
    'validate',
]

import os
from dataclasses import dataclass
from typing import Mapping, Optional

DEFAULT_BUDGET = 1_000_000_000
DEFAULT_VERIFY_MAX_CELLS = 2 ** 20

BUDGET = int(os.environ.get('REPET2D_BUDGET', str(DEFAULT_BUDGET)))
VERIFY_MAX_CELLS = int(os.environ.get('REPET2D_VERIFY_MAX_CELLS', str(DEFAULT_VERIFY_MAX_CELLS)))
LOG_LEVEL = os.environ.get('REPET2D_LOG_LEVEL', 'WARNING')
REPORT_DIR = os.environ.get('REPET2D_REPORT_DIR', '.')
FIXTURE_DIR = os.environ.get(
    'REPET2D_FIXTURE_DIR',
    os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'fixtures'),
)

# exact-solver caps
GAMMA_CELL_LIMIT = 20
B_CELL_LIMIT = 9
G_FACTOR_LIMIT = 5000
G_WORK_LIMIT = 2_000_000


@dataclass(frozen=True)
class Settings:
    budget: int = DEFAULT_BUDGET
    verify_max_cells: int = DEFAULT_VERIFY_MAX_CELLS
    log_level: str = 'WARNING'
    report_dir: str = '.'


def load_settings(environ: Optional[Mapping[str, str]] = None, budget: Optional[int] = None) -> Settings:
    '''
    Snapshot of the environment-driven settings.
    Args: environ - mapping to read (defaults to os.environ)
          budget - explicit override, e.g. from the --budget flag
    Returns: Settings
    '''
    env = os.environ if environ is None else environ
    return Settings(
        budget=budget if budget is not None else int(env.get('REPET2D_BUDGET', str(DEFAULT_BUDGET))),
        verify_max_cells=int(env.get('REPET2D_VERIFY_MAX_CELLS', str(DEFAULT_VERIFY_MAX_CELLS))),
        log_level=env.get('REPET2D_LOG_LEVEL', 'WARNING').upper(),
        report_dir=env.get('REPET2D_REPORT_DIR', '.'),
    )

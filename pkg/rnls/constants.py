TERMINATION_CAP = 'cap'
TERMINATION_T_END = 't_end'
TERMINATION_NONFINITE = 'nonfinite'
TERMINATION_MAX_STEPS = 'max_steps'
TERMINATION_ERROR = 'error'
TERMINATION_REMESH_FAILED = 'remesh_failed'

BLOWUP_TERMINATIONS = (TERMINATION_CAP, TERMINATION_NONFINITE)

LIFESPAN_FINITE = 'finite'
LIFESPAN_GLOBAL = 'global'

DIRECTION_ATTRACTIVE = 'attractive'
DIRECTION_REPULSIVE = 'repulsive'
DIRECTION_FREE = 'free'

BOUNDARY_DIRICHLET = 'dirichlet'

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

DIAGNOSTICS_COLUMNS = (
    't',
    'dt',
    'mass',
    'energy',
    'E0',
    'ellOmega',
    'J',
    'Jprime',
    'umax',
    'gradl2',
    'L',
    'remesh',
)

SNAPSHOT_MAGIC = b'RNLS'
SNAPSHOT_VERSION = 1

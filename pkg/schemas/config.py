from pydantic import BaseModel, model_validator, validator
from typing import List, Optional

COMMANDS = ('build', 'flow', 'frobenius', 'stats', 'gauss', 'expansion', 'verify')
MODELS = ('staircase', 'windtree', 'torus', 'file')
FLOW_DIRECTIONS = ('stable', 'unstable', 'horizontal', 'vertical')
TASKS = {
    'flow': ('orbit', 'integral', 'return'),
    'stats': ('sigma', 'llt', 'lambda-u', 'asclt', 'drift', 'growth'),
    'expansion': ('compare', 'wre', 'hore'),
}
DEFAULT_TASKS = {'flow': 'orbit', 'stats': 'sigma', 'expansion': 'compare'}
SUITES = ('all', 'surface', 'flow', 'renorm', 'stats', 'gauss', 'asymptotics')
HORE_MODES = ('measured', 'synthetic')


def _split_list(v):
    if isinstance(v, str):
        return [item for item in v.replace(' ', '').split(',') if item]
    if isinstance(v, (int, float)):
        return [v]
    return v


class RunConfig(BaseModel):
    command: str
    model: str = 'staircase'
    s: int = 2
    file: Optional[str] = None
    word: Optional[str] = None
    task: Optional[str] = None
    t: float = 100.0
    T: List[float] = [1e3]
    K: int = 100
    K_list: List[int] = [16, 32, 64, 128, 256, 512, 1024]
    samples: int = 1000
    lags: int = 20
    u_grid: List[float] = [0.02, 0.05, 0.1]
    j: int = 0
    sigma: float = 1.0
    L: List[float] = [0.0]
    oracle: bool = False
    direction: str = 'stable'
    observable: Optional[str] = None
    N: float = 1e5
    mode: str = 'measured'
    suite: str = 'all'
    quick: bool = False
    seed: int = 0
    workers: int = 1
    out: Optional[str] = None
    verbose: int = 0

    @validator('T', 'K_list', 'u_grid', 'L', pre=True)
    def validate_lists(cls, v):
        return _split_list(v)

    @validator('command')
    def validate_command(cls, v):
        if v not in COMMANDS:
            raise ValueError(f'Command must be one of: {list(COMMANDS)}')
        return v

    @validator('model')
    def validate_model(cls, v):
        if v not in MODELS:
            raise ValueError(f'Model must be one of: {list(MODELS)}')
        return v

    @validator('s')
    def validate_s(cls, v):
        if v < 2:
            raise ValueError('Staircase parameter s must be at least 2')
        return v

    @validator('word')
    def validate_word(cls, v):
        if v is not None and (not v or any(ch not in 'hvHV' for ch in v)):
            raise ValueError('Twist word must be a nonempty string over h, v, H, V')
        return v

    @validator('direction')
    def validate_direction(cls, v):
        if v not in FLOW_DIRECTIONS:
            raise ValueError(f'Direction must be one of: {list(FLOW_DIRECTIONS)}')
        return v

    @validator('mode')
    def validate_mode(cls, v):
        if v not in HORE_MODES:
            raise ValueError(f'Mode must be one of: {list(HORE_MODES)}')
        return v

    @validator('suite')
    def validate_suite(cls, v):
        if v not in SUITES:
            raise ValueError(f'Suite must be one of: {list(SUITES)}')
        return v

    @validator('samples', 'lags', 'K', 'workers')
    def validate_positive(cls, v):
        if v < 1:
            raise ValueError('Counts must be positive')
        return v

    @validator('T')
    def validate_times(cls, v):
        if not v or any(t < 1 for t in v):
            raise ValueError('Times T must be at least 1')
        return v

    @model_validator(mode='after')
    def check_command_fields(self):
        if self.file is not None:
            self.model = 'file'
        if self.model == 'file' and self.file is None:
            raise ValueError('Model "file" needs a surface file')
        if self.command in TASKS:
            if self.task is None:
                self.task = DEFAULT_TASKS[self.command]
            if self.task not in TASKS[self.command]:
                raise ValueError(f'Task for {self.command} must be one of: {list(TASKS[self.command])}')
        return self

    @property
    def needs_automorphism(self) -> bool:
        if self.command in ('frobenius', 'expansion'):
            return True
        if self.command == 'stats':
            return self.task != 'asclt'
        return self.command == 'flow' and self.direction in ('stable', 'unstable')

    @property
    def needs_hyperbolic(self) -> bool:
        if self.command == 'expansion':
            return True
        if self.command == 'stats':
            return self.task not in ('asclt', 'drift')
        return self.command == 'flow' and self.direction in ('stable', 'unstable')

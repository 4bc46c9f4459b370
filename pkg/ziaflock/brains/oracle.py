''' Classical alpha-agent controller as a position-command backend '''
from __future__ import annotations
from typing import Optional, TYPE_CHECKING

import numpy as np

from ..world import WorldState, MotionLimits, Decision
from ..olfati import AlphaParams, predict_round, describe_prediction
from .brain import Brain

if TYPE_CHECKING:
    from ..config import ExperimentConfig
    from ..chat import ChatClient


class OracleBrain(Brain, kind='oracle'):
    ''' Integrates the flocking law for one round and commands the end point

        When the world moved every agent where the last prediction said it
        would, the predicted velocities carry over into the next round's
        integration. Otherwise the snapshot velocities are used.

        Args:
            agent_id: The agent this brain controls
            params: Controller parameters
            substeps: Integration steps per round
            dt: Integration time step
    '''
    def __init__(self, agent_id: int, params: Optional[AlphaParams] = None,
                 substeps: int = 20, dt: float = .05, **kwargs):
        super().__init__(agent_id)
        self.params = params if params else AlphaParams()
        self.substeps = substeps
        self.dt = dt
        self._predicted: Optional[tuple[int, np.ndarray, np.ndarray]] = None

    @classmethod
    def fromconfig(cls, agent_id: int, cfg: 'ExperimentConfig',
                   client: Optional['ChatClient'] = None) -> 'OracleBrain':
        return cls(agent_id, cfg.alpha_params, cfg.oracle.substeps, cfg.oracle.dt)

    def warm_velocities(self, state: WorldState) -> Optional[np.ndarray]:
        ''' Internal velocities to start from, if the last prediction came true '''
        if self._predicted is None:
            return None
        round, pos, vel = self._predicted
        current, _ = state.snapshot()
        if round == state.round and current.shape == pos.shape and np.allclose(current, pos, rtol=0, atol=1E-9):
            return vel
        return None

    def decide(self, state: WorldState, limits: MotionLimits) -> Decision:
        velocities = self.warm_velocities(state)
        pos, vel = predict_round(state, self.params, self.substeps, self.dt, velocities)
        self._predicted = (state.round + 1, pos, vel)
        return describe_prediction(self.agent_id, state, self.params, limits, pos, velocities)


class OracleWrapperBrain(OracleBrain, kind='oracle-flocker-wrapper'):
    ''' The oracle, selected as scripted:oracle-flocker-wrapper '''

"""Model-free PID tuning by random search over closed-loop step responses."""
from .closedloop import GainVector, ResponseVector, SamplingGrid, pid_control_step, simulate_closed_loop
from .lti import DiscretePlant, TransferFunction, discretize, make_tf, tf_to_ss, zoh_discretize
from .objective import RewardConfig, iae, ise, reward
from .simc import FopdtModel, simc_pi
from .tuner import EpisodeRecord, Policy, TunerConfig, episode, policy_action, sample_directions, train

__version__ = "0.1.0"

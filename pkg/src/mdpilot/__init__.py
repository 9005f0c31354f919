"""Policy synthesis, evaluation and imitation for Markov decision processes.

The package combines four ingredients behind one toolkit:

* exact probabilistic model checking (PCTL on Markov chains, optimal
  reachability and finite-horizon total reward on MDPs),
* Monte Carlo tree search with pluggable action-pruning advice,
* statistical evaluation of policies with Chernoff-Hoeffding sample
  bounds, and
* a sharp dataset-aggregation loop that trains neural surrogates of
  expert policies and advice.

Hot simulation and inference kernels are JIT-compiled with numba; set
``MDPILOT_KERNELS=numpy`` to force the pure NumPy/Python fallback.
"""

__version__ = "0.1.0"

from .mdp import Distribution, ExplicitMc, ExplicitMdp, Path, simulate, total_reward

__all__ = [
    "Distribution",
    "ExplicitMc",
    "ExplicitMdp",
    "Path",
    "simulate",
    "total_reward",
    "__version__",
]

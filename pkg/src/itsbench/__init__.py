"""Workbench for intrusion-tolerant control-center architectures.

Four layers:

* :mod:`itsbench.semimarkov` - generic discrete-time semi-Markov
  analytics (stationary solves, availability, absorption analysis).
* :mod:`itsbench.montecarlo` - seeded Monte Carlo cross-checks of the
  analytics.
* :mod:`itsbench.models` - the three architecture variants (Proposed,
  SITAR, SCIT) as models plus hand-coded closed-form oracles.
* :mod:`itsbench.replicasim` - deterministic discrete-event simulation
  of the replicated architecture with a full audit trail.

The ``itsbench`` command line (:mod:`itsbench.cli`) ties them together.
"""

__version__ = "0.1.0"

"""Online adaptive stochastic MPC with chance-constraint relaxation.

Library modules:

* :mod:`oasmpc.lti` - plant, constraints and horizon stacking
* :mod:`oasmpc.lp` / :mod:`oasmpc.simplex` - LP model, epigraph helpers, solvers
* :mod:`oasmpc.mpc` - nominal receding-horizon problem
* :mod:`oasmpc.adaptation` - violation tracking and the online h update
* :mod:`oasmpc.postproc` - closed-loop correction for realized uncertainty
* :mod:`oasmpc.theory` - critical region, beta/Delta and the ideal-policy oracle
* :mod:`oasmpc.microgrid` / :mod:`oasmpc.forecast` - battery case study
* :mod:`oasmpc.simulation` / :mod:`oasmpc.report` / :mod:`oasmpc.cli` - batch driver
"""

__version__ = "0.1.0"

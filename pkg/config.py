# config.py

import os

# Get root directory
root_dir = os.path.dirname(os.path.abspath(__file__))


kelly_config = {
    # Quadrature
    'quad_half_width': 10.0,        # Log-space integration half width, in standard deviations
    'quad_epsabs': 1e-13,           # QUADPACK absolute tolerance (single asset residuals)
    'quad_epsrel': 1e-12,
    'quad_limit': 200,              # Max QUADPACK subintervals
    'hermite_orders': (16, 32, 64, 128),  # Gauss-Hermite orders tried per axis for L >= 2
    'hermite_max_points': 300000,   # Cap on tensor grid size (64**3 = 262144 fits, 128**3 does not)
    'hermite_tol': 1e-12,           # Agreement needed between successive orders

    # Linear (moment matrix) solve
    'cond_max': 1e12,               # Above this condition number fall through to least squares
    'rank_tol': 1e-10,              # Singular values below rank_tol * s_max are dropped
    'residual_tol': 1e-10,          # ||Mf - b|| <= residual_tol * (||M|| ||f|| + ||b||)
    'taylor_mu_max': 0.2,           # TaylorRegimeWarning when |mu| exceeds this ...
    'taylor_sigma_max': 1.0,        # ... or sigma exceeds this

    # Exact criterion solve
    'boundary_eps': 1e-9,           # Root bracket is [0, 1 - boundary_eps]
    'root_tol': 1e-10,              # Residual certificate for returned roots
    'newton_tol': 1e-10,            # ||residual||_inf at convergence
    'newton_max_iter': 100,
    'newton_max_halvings': 30,      # Step halvings per Newton iteration
    'fd_step': 1e-6,                # Relative finite-difference step for the Jacobian

    # Monte Carlo
    'rounds': 1000,                 # Rounds N per wealth path
    'replications': 200,            # Independent paths
    'seed': 0,
    'antithetic': False,            # Pair each normal draw z with -z
    'num_workers': 1,               # > 1 runs replications in a multiprocessing pool
    'verify_delta': 0.1,            # Perturbation used by `simulate --verify`
    'sample_size': 10000,           # Draws written by `kelly.py sample`

    # Input / output
    'schema_version': '1',
    'csv_digits': 10,               # Significant digits in sweep CSVs
    'specs_dir': os.path.join(root_dir, 'dataset', 'specs'),
    'out_dir': os.path.join(root_dir, 'out'),
    'progress': False,              # tqdm progress bars on long loops
    'log_level': 'INFO',
}

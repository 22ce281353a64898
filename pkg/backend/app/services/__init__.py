from .experiments import run_convergence, run_pareto, run_pointwise
from .glme import assemble_system, recover, recover_reference_tib, write_potential_csv
from .spectral import advance_track, init_track, kernel_value, time_reverse
from .zs_oracle import find_eigenvalues, forward_scatter, left_spectrum, make_signal

__all__ = [
    "advance_track", "init_track", "kernel_value", "time_reverse",
    "find_eigenvalues", "forward_scatter", "left_spectrum", "make_signal",
    "assemble_system", "recover", "recover_reference_tib", "write_potential_csv",
    "run_convergence", "run_pareto", "run_pointwise",
]

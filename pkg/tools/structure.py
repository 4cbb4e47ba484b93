complex_pair = list  # [re, im]
weak_vector_structure = [complex_pair]

circuit_document_structure = {
    "n_qubits": int,
    "prep": list | dict,
    "moments": [list],
    "meas": list | dict,
}

weak_report_structure = {
    "amplitude": complex_pair,
    "probability": float,
    "cuts": [
        {
            "cut": {"moment": int},
            "weak_vectors": [weak_vector_structure],
        }
    ],
}

check_report_structure = {
    "check": str,
    "status": str,
    "pass": bool,
    "skipped": bool,
    "max_residual": float,
    "tolerance": float,
    "witness": dict | None,
}

solver_report_structure = {
    "problem": {"circuit": str, "alpha": float, "prep": list, "meas": str},
    "mode": str,
    "n_seeds": dict,
    "converged_starts": dict,
    "rng_seed": int,
    "solutions": [
        {
            "outcome": str,
            "s_a0": weak_vector_structure,
            "s_b0": weak_vector_structure,
            "residual": float,
        }
    ],
    "counts": dict,
    "probabilities": dict | None,
}

boundary_table_structure = [
    {
        "outcome": str,
        "tau": float,
        "w_a": weak_vector_structure,
        "w_b": weak_vector_structure,
    }
]

fit_summary_structure = {
    "reproduction": str,
    "rng_seed": int,
    "alpha": float,
    "fits": dict,
    "max_fit_residual": float,
}

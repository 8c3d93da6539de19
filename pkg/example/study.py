# Python configs run with `from contactrom.config_api import *` in scope.
# Compare the threshold tau = 0 against tau = delta at d = 0.25.
study(
    problem="hertz",
    stage="tau",
    design="uniform:30",
    delta=1e-6,
    tau_query=(0.25,),
    output_dir="results/hertz_tau",
)

# run `contactrom compare` against a stored baseline with these ratios
thresholds(
    ratio_mean_primal_err=(None, 1.5),
    ratio_mean_dual_err=(None, 1.5),
)

workers(4)

DEFAULT_CONFIG = {
    "experiment": {
        "p": 10,                     # Number of data streams
        "m": 6,                      # Number of streams observed per step
        "k": 5,                      # Number of shifted streams (the first k)
        "pattern": "a",              # Shift pattern: "a" all positive, "b" alternating signs
        "delta_train": 1.0,          # Shift magnitude used while training
        "delta_test": 1.0,           # Shift magnitude used while evaluating
        "noise_sigma": 0.0,          # Observation noise standard deviation
        "horizon": 200,              # Time steps per episode
        "episodes": 400,             # Training episodes
        "seed": 2024,                # Root seed; every other seed is derived from it
        "replications": 100,         # Evaluation replications
        "eval_onset": 1,             # Onset time of the shift during evaluation
        "edge_prob": 0.3,            # Erdos-Renyi edge probability of the ground-truth DAG
        "weight_low": 0.3,           # Smallest SEM edge weight magnitude
        "weight_high": 0.8,          # Largest SEM edge weight magnitude
        "mode": "causal",            # "causal" or "non_causal"
        "cpe_source": "discovered",  # "discovered", "ground_truth", "none", "low_quality", "adversarial"
        "workers": 1,                # Worker processes for evaluation replications
    },
    "net": {
        "hidden": "256,256,256",     # Hidden layer widths (comma separated)
        "lr": 5e-3,                  # SGD learning rate
        "gamma": 0.9,                # Discount factor
        "batch_size": 32,            # Replay batch size
        "alpha_ent": 0.05,           # Causal entropy coefficient
        "alpha_decay": 1.0,          # Per-episode multiplicative decay of alpha_ent (1.0 keeps it constant)
        "tau0": 0.65,                # Initial Boltzmann temperature
        "tau_decay": 0.995,          # Per-episode multiplicative temperature decay
        "tau_floor": 0.05,           # Smallest temperature
        "tau_reading": "initial",    # "initial": tau0 is the tabulated value; "decay": the tabulated value is tau_decay
        "sync_kind": "hard",         # Target sync: "hard" or "polyak"
        "sync_period": 100,          # Optimizer steps between hard copies
        "sync_rate": 0.01,           # Polyak rate
        "replay_capacity": 10000,    # Replay buffer capacity
        "warmup": 64,                # Transitions collected before the first update
        "updates_per_step": 1,       # Gradient steps after each environment step
        "grad_clip": 10.0,           # Global gradient-norm clip (0 disables)
        "state_squash": True,        # Compress the causal state before the network
    },
    "monitor": {
        "lam": 0.1,                  # Time-decay parameter of the local statistic
        "sigma_scale": 1.0,          # Monitor covariance is sigma_scale * I
        "zeta": 0.05,                # Alarm significance level
        "alarm_dof": 0,              # Chi-square degrees of freedom (0 means p)
    },
    "discovery": {
        "alpha_sig": 0.05,           # Significance level of the conditional independence tests
        "max_cond": 3,               # Largest conditioning set size
        "cpe_refresh": "episode",    # "once", "episode", or a step count
        "context_window": 100,       # Rows of in-control history used for discovery
        "discovery_scope": "selected",  # "selected" streams only, or "all"
        "keep_fraction": 0.2,        # low_quality source: share of true edges kept
        "false_fraction": 0.85,      # low_quality source: share of predicted edges that are false
        "adversarial_strength": 0.8, # adversarial source: constant path coefficient
    },
    "reward": {
        "y_value": 1.0,              # Action reward weight on shifted streams
        "w_value": 0.5,              # State reward weight on shifted streams
        "penalty": -20.0,            # Reward when no shifted stream is selected
        "baseline_pre": 0.0,         # Reward before onset
        "baseline_post": 0.0,        # Reward after the anomaly window
        "scaled_reward": False,      # Divide rewards by sum(y + w) - penalty
    },
}

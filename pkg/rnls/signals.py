from django.dispatch import Signal

# Arguments: "params", "state"
run_started = Signal()

# Arguments: "state", "row"
step_completed = Signal()

# Arguments: "state"
pre_remesh = Signal()

# Arguments: "state", "mass_delta"
post_remesh = Signal()

# Arguments: "state", "termination"
run_finished = Signal()

"""Registry for acceptance-criterion result lines, printed in the terminal
summary by conftest so capture modes cannot swallow them."""

LINES = []


def record(number, budget, elapsed, description):
    LINES.append(
        f"[acceptance {number}] PASS ({elapsed:.2f}s < {budget}s) {description}"
    )

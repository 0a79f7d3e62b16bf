"""Reference worst-case collision values for q = 256, keyed by (d, m)."""

BIASED = {
    (2, 1): 0.9998, (2, 2): 0.9996, (2, 3): 0.9994, (2, 4): 0.9992,
    (2, 5): 0.999, (2, 6): 0.9988, (2, 7): 0.9986,
    (3, 1): 0.9681, (3, 2): 0.9372, (3, 3): 0.9073, (3, 4): 0.8784, (3, 5): 0.8504,
    (4, 1): 0.8329, (4, 2): 0.6937, (4, 3): 0.5778, (4, 4): 0.4813,
}

OPTIMIZED = {
    (2, 1): 0.9998, (2, 2): 0.959, (2, 3): 0.7519, (2, 4): 0.4378,
    (2, 5): 0.2031, (2, 6): 0.0806, (2, 7): 0.0279,
    (3, 1): 0.9681, (3, 2): 0.5422, (3, 3): 0.1483, (3, 4): 0.0368, (3, 5): 0.0063,
    (4, 1): 0.8329, (4, 2): 0.2174, (4, 3): 0.0429, (4, 4): 0.0072,
}


def optimized_limit(value: float) -> float:
    return value + (0.005 if value < 0.05 else 0.02)

"""
FRVKit test package
Unit tests for the quaternion algebra, addition engine, closed forms, sampling,
comparisons, exports and the command-line driver

Long Monte Carlo acceptance runs are marked `slow` and deselected by default;
run them with `pytest -m slow`.
"""

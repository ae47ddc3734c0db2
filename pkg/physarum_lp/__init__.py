"""Physarum dynamics for linear programs: ẋ = q(x) − x with q the electrical flow at conductances x/c."""

"""Bivariate exponential (Ornstein-Uhlenbeck) Gaussian process under fixed-domain sampling."""

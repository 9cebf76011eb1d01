"""Numerical core: kernels, samplers, local times, quadratures and reweighting."""

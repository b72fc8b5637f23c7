"""Distributional analysis of discounted LQR returns under a fixed linear gain."""

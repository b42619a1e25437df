"""Shipped power calibration profiles (JSON, one per named platform)."""

"""LSTM groundwater-level forecasting with Lion Algorithm weight optimization."""

__version__ = "0.1.0"

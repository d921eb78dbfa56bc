"""Weekly agriculture commodity price forecasting.

Five model families (ARIMA, SVR, trend decomposition, boosted trees, LSTM)
implemented from first principles, an engine that tunes, trains and selects
the lowest-MSE model per commodity, and an HTTP service plus CLI on top.
"""

__version__ = "0.1.0"

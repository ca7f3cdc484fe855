"""Top Trading Cycles under stochastic dominance."""

# TempoHorn application: HTTP API and command line

# Request, response and run configuration models

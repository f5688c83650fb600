# Verification pipeline shared by the API and the CLI

# Persistent model types stored in a run directory

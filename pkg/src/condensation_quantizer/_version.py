# Recorded in every run manifest
version = "0.1.0"

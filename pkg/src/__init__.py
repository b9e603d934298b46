# Initialization file for the src package

# Initialization file for the utils package

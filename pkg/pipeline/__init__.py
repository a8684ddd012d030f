"""Experiment records, persisted laws, plot series and the command line."""

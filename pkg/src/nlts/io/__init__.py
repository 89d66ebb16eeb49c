"""Configuration, initial data, file formats and the command line."""

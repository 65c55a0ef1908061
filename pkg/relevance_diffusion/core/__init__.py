"""Core numerical machinery: parameters, schedules, networks, losses, training and sampling."""

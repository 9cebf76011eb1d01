"""Scripted numerical experiments on loops and starbursts."""

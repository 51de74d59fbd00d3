"""Stochastic session simulation"""

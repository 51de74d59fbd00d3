"""Structured logging and metrics"""

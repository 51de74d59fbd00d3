"""Photocurrent monitor model"""

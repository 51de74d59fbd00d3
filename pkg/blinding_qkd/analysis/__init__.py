"""Attack strategy, key rates and distance scans"""

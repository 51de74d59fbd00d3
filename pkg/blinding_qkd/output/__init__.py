"""Result writers"""

"""
Execuções de Monte Carlo em escala de bancada: recuperação por experimento
e comportamento da drenagem em função do orçamento T.
"""

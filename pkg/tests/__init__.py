"""
Testes automatizados da recuperação de fatores latentes.
"""

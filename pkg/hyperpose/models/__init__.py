"""
`models` package holds the DTO classes and registries. They should carry as little
logic as possible.
"""

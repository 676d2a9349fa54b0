"""Small shared helpers: file IO, requirements, nested-dict access."""

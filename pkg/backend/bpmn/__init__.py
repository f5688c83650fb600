"""Business process specifications and their well-formedness conditions."""

"""Monte-Carlo experiment harness and CLI plumbing."""

"""Story understanding with realm agents and weighted MAX-SAT settlement."""

# Run ledger: SQLAlchemy models, repository and event-bus subscriber

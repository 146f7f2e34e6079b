# core package: line process sampling, arrangement routing and experiments

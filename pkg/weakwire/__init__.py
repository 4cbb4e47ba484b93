"""Post-selected local weak values and a hidden-variable model for small qubit circuits."""

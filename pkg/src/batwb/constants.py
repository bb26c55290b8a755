F = 96485.33212  # C/mol
R_GAS = 8.314462618  # J/(mol K)
T_REF = 298.15  # K

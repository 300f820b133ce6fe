matrix = [[r * c for c in range(6)] for r in range(6)]

transpose = [list(col) for col in zip(*matrix)]

assert matrix == transpose

for row in matrix:
    print(' '.join(f'{v:3d}' for v in row))
print('symmetric ok')

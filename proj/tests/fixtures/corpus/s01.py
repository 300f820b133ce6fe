print(40 + 2)
print('ok')

class Point:
    def __init__(self, x, y):
        self.x = x
        self.y = y

    def norm(self):
        return (self.x ** 2 + self.y ** 2) ** 0.5

    def scaled(self, k):
        return Point(self.x * k, self.y * k)

p = Point(3, 4)
print(p.norm(), p.scaled(2).norm())
